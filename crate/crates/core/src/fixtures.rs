//! Reference triangulations and random weight/metric generators.

use rand::{Rng, RngExt};

use crate::complex::{Edge, FaceWeightTriple, Geometry, PackingMetric, WeightedComplex};
use crate::error::Result;
use crate::hyperbolic::uniform_radius_bound;
use crate::kernel;
use crate::scalar::Real;

pub fn tetrahedron_faces() -> Vec<[usize; 3]> {
    vec![[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]]
}

pub fn octahedron_faces() -> Vec<[usize; 3]> {
    // poles 0 and 5 around the equator 1-2-3-4
    vec![
        [0, 1, 2],
        [0, 2, 3],
        [0, 3, 4],
        [0, 4, 1],
        [5, 2, 1],
        [5, 3, 2],
        [5, 4, 3],
        [5, 1, 4],
    ]
}

/// Regular `n × m` grid on the flat torus, two triangles per square.
pub fn torus_faces(n: usize, m: usize) -> Vec<[usize; 3]> {
    assert!(n >= 3 && m >= 3, "torus grid needs at least 3x3 vertices");
    let v = |i: usize, j: usize| (i % n) * m + (j % m);
    let mut faces = Vec::with_capacity(2 * n * m);
    for i in 0..n {
        for j in 0..m {
            faces.push([v(i, j), v(i + 1, j), v(i + 1, j + 1)]);
            faces.push([v(i, j), v(i + 1, j + 1), v(i, j + 1)]);
        }
    }
    faces
}

/// Connected sum of two 4×4 tori along one triangle: 29 vertices, χ = -2.
pub fn genus2_faces() -> Vec<[usize; 3]> {
    let a = torus_faces(4, 4);
    let removed = a[0];
    let mut faces: Vec<[usize; 3]> = a[1..].to_vec();
    // Glue the second copy with reversed orientation along `removed`.
    let glue = [
        (removed[0], removed[0]),
        (removed[1], removed[2]),
        (removed[2], removed[1]),
    ];
    let mut next = 16;
    let mut map = [usize::MAX; 16];
    for (b, a) in glue {
        map[b] = a;
    }
    for slot in map.iter_mut() {
        if *slot == usize::MAX {
            *slot = next;
            next += 1;
        }
    }
    faces.extend(torus_faces(4, 4)[1..].iter().map(|t| t.map(|x| map[x])));
    faces
}

fn uniform_complex<T: Real>(faces: Vec<[usize; 3]>, value: f64) -> WeightedComplex<T> {
    let n = faces.iter().flatten().max().map_or(0, |m| m + 1);
    WeightedComplex::uniform(n, faces, T::lit(value)).expect("fixture is a closed surface")
}

pub fn tetrahedron<T: Real>(value: f64) -> WeightedComplex<T> {
    uniform_complex(tetrahedron_faces(), value)
}

pub fn octahedron<T: Real>(value: f64) -> WeightedComplex<T> {
    uniform_complex(octahedron_faces(), value)
}

pub fn torus<T: Real>(n: usize, m: usize, value: f64) -> WeightedComplex<T> {
    uniform_complex(torus_faces(n, m), value)
}

pub fn genus2<T: Real>(value: f64) -> WeightedComplex<T> {
    uniform_complex(genus2_faces(), value)
}

/// Named fixture lookup used by the command line.
pub fn by_name<T: Real>(name: &str) -> Option<WeightedComplex<T>> {
    match name {
        "tetrahedron" | "tet" => Some(tetrahedron(1.0)),
        "octahedron" | "oct" => Some(octahedron(1.0)),
        "torus" => Some(torus(4, 4, 1.0)),
        "genus2" => Some(genus2(1.0)),
        _ => None,
    }
}

pub const FIXTURE_NAMES: [&str; 4] = ["tetrahedron", "octahedron", "torus", "genus2"];

/// Weight strata: intersecting with negative I, intersecting/tangent with
/// I in [0, 1], and disjoint with I in (1, upper].
pub fn stratified_weight<R: Rng + ?Sized>(rng: &mut R, upper: f64) -> f64 {
    match rng.random_range(0..3u8) {
        0 => rng.random_range(-0.95..0.0),
        1 => rng.random_range(0.0..=1.0),
        _ => rng.random_range(1.0..upper).max(1.0 + 1e-9),
    }
}

/// Random weight triple with `γ ≥ 0`, by rejection over the strata.
pub fn random_face_weights<R: Rng + ?Sized>(rng: &mut R, upper: f64) -> FaceWeightTriple<f64> {
    loop {
        let w = FaceWeightTriple::new(
            stratified_weight(rng, upper),
            stratified_weight(rng, upper),
            stratified_weight(rng, upper),
        );
        if w.satisfies_weight_condition() {
            return w;
        }
    }
}

/// Random triple with `I ∈ (-1, 1]` and `γ ≥ 0`.
pub fn random_zhou_weights<R: Rng + ?Sized>(rng: &mut R) -> FaceWeightTriple<f64> {
    loop {
        let w = FaceWeightTriple::new(
            rng.random_range(-0.999..=1.0),
            rng.random_range(-0.999..=1.0),
            rng.random_range(-0.999..=1.0),
        );
        if w.satisfies_weight_condition() {
            return w;
        }
    }
}

/// Log-uniform radius in `[lo, hi]`.
pub fn log_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo.ln()..=hi.ln()).exp()
}

/// Stratified weights on the edges of `c` with `γ ≥ 0` on every face.
/// Failing faces get their most negative weight resampled; after a few
/// rounds a stubborn weight is drawn from the nonnegative strata.
pub fn random_weights<R: Rng + ?Sized>(c: &WeightedComplex<f64>, rng: &mut R, upper: f64) -> WeightedComplex<f64> {
    let mut w: Vec<f64> = (0..c.edges().len()).map(|_| stratified_weight(rng, upper)).collect();
    for round in 0..64 {
        let mut clean = true;
        for f in 0..c.faces().len() {
            let fe = c.face_edges(f);
            let t = FaceWeightTriple { w: fe.map(|e| w[e]) };
            if t.satisfies_weight_condition() {
                continue;
            }
            clean = false;
            let worst = (0..3).min_by(|&a, &b| t.w[a].partial_cmp(&t.w[b]).unwrap()).unwrap();
            w[fe[worst]] = if round < 8 {
                stratified_weight(rng, upper)
            } else {
                rng.random_range(0.0..upper)
            };
        }
        if clean {
            break;
        }
    }
    c.with_weights(w).expect("weights stay above -1")
}

fn all_admissible(c: &WeightedComplex<f64>, g: Geometry, radii: &[f64]) -> bool {
    (0..c.faces().len()).all(|f| {
        let r = c.faces()[f].map(|v| radii[v]);
        kernel::admissibility(g, r, &c.face_weights(f)).admissible
    })
}

/// Rejection-samples a metric at which every face is admissible. Returns
/// `None` when even the unperturbed base radii fail.
pub fn random_admissible_metric<R: Rng + ?Sized>(
    c: &WeightedComplex<f64>,
    g: Geometry,
    rng: &mut R,
) -> Option<PackingMetric<f64>> {
    let n = c.vertex_count();
    let base = match g {
        Geometry::Euclidean => 1.0,
        Geometry::Hyperbolic => {
            let s_star = (0..c.faces().len())
                .filter_map(|f| uniform_radius_bound(&c.face_weights(f)).ok())
                .fold(0.0, f64::max);
            (s_star + 0.2).max(rng.random_range(0.3..1.5))
        }
    };
    let mut sigma: f64 = 1.0;
    for attempt in 0..400 {
        if attempt % 25 == 24 {
            sigma *= 0.5;
        }
        let radii: Vec<f64> = (0..n)
            .map(|_| base * (sigma * rng.random_range(-1.0..1.0)).exp())
            .collect();
        if all_admissible(c, g, &radii) {
            return PackingMetric::new(g, radii).ok();
        }
    }
    let radii = vec![base; n];
    if all_admissible(c, g, &radii) {
        PackingMetric::new(g, radii).ok()
    } else {
        None
    }
}

/// Random weights with `γ ≥ 0` together with an admissible metric.
pub fn random_instance<R: Rng + ?Sized>(
    c: &WeightedComplex<f64>,
    g: Geometry,
    rng: &mut R,
    upper: f64,
) -> Result<(WeightedComplex<f64>, PackingMetric<f64>)> {
    loop {
        let wc = random_weights(c, rng, upper);
        if wc.require_weight_condition().is_err() {
            continue;
        }
        if let Some(m) = random_admissible_metric(&wc, g, rng) {
            return Ok((wc, m));
        }
    }
}

/// All edges of a face list in canonical order.
pub fn edges_of(faces: &[[usize; 3]]) -> Vec<Edge> {
    let mut e: Vec<Edge> = faces
        .iter()
        .flat_map(|t| [Edge::new(t[0], t[1]), Edge::new(t[1], t[2]), Edge::new(t[0], t[2])])
        .collect();
    e.sort();
    e.dedup();
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn fixture_topology() {
        let cases: [(WeightedComplex<f64>, usize, usize, usize, i64); 4] = [
            (tetrahedron(1.0), 4, 6, 4, 2),
            (octahedron(1.0), 6, 12, 8, 2),
            (torus(4, 4, 1.0), 16, 48, 32, 0),
            (genus2(1.0), 29, 93, 62, -2),
        ];
        for (c, v, e, f, chi) in cases {
            assert_eq!(c.vertex_count(), v);
            assert_eq!(c.edges().len(), e);
            assert_eq!(c.faces().len(), f);
            assert_eq!(c.euler_characteristic(), chi);
        }
    }

    #[test]
    fn genus2_vertex_links_are_cycles() {
        let faces = genus2_faces();
        for v in 0..29 {
            let mut link: Vec<(usize, usize)> = faces
                .iter()
                .filter(|t| t.contains(&v))
                .map(|t| {
                    let o: Vec<usize> = t.iter().copied().filter(|&x| x != v).collect();
                    (o[0], o[1])
                })
                .collect();
            let start = link[0].0;
            let mut cur = link[0].1;
            link.swap_remove(0);
            while cur != start {
                let p = link
                    .iter()
                    .position(|&(a, b)| a == cur || b == cur)
                    .expect("link is connected");
                let (a, b) = link.swap_remove(p);
                cur = if a == cur { b } else { a };
            }
            assert!(link.is_empty(), "vertex {v} link has several components");
        }
    }

    #[test]
    fn random_weights_satisfy_condition_and_cover_strata() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let c = genus2::<f64>(1.0);
        let mut neg = 0;
        for _ in 0..20 {
            let w = random_weights(&c, &mut rng, 2.5);
            assert!(w.validate_weight_condition().passes());
            neg += w.weights().iter().filter(|x| **x < 0.0).count();
        }
        assert!(neg > 0);
    }

    #[test]
    fn random_instances_are_admissible() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for g in [Geometry::Euclidean, Geometry::Hyperbolic] {
            for c in [tetrahedron::<f64>(1.0), torus(4, 4, 1.0), genus2(1.0)] {
                let (wc, m) = random_instance(&c, g, &mut rng, 2.5).unwrap();
                assert!(all_admissible(&wc, g, m.radii()));
            }
        }
    }
}
