//! Mutated documents never panic the loader, and a structurally valid
//! document loads exactly when the builders accept its contents.

use std::panic::{catch_unwind, AssertUnwindSafe};

use packing_forge::audit::sample_rng;
use packing_forge::complex::{Edge, Geometry, PackingMetric, WeightedComplex};
use packing_forge::document::{parse_document, PackingDocument, TargetSpec, SCHEMA_VERSION};
use packing_forge::fixtures;
use rand::{Rng, RngExt};
use serde_json::{json, Value};

fn seed_documents() -> Vec<Value> {
    let mut out = Vec::new();
    for name in fixtures::FIXTURE_NAMES {
        let c: WeightedComplex<f64> = fixtures::by_name(name).unwrap();
        for g in [Geometry::Euclidean, Geometry::Hyperbolic] {
            let mut doc = PackingDocument::from_complex(&c, g);
            doc.radii = Some(vec![0.5; c.vertex_count()]);
            doc.target = Some(TargetSpec::Alpha {
                alpha: 1.0,
                values: vec![0.1; c.vertex_count()],
            });
            out.push(serde_json::to_value(&doc).unwrap());
        }
    }
    out
}

fn random_scalar<R: Rng + ?Sized>(rng: &mut R) -> Value {
    match rng.random_range(0..9u8) {
        0 => json!(0),
        1 => json!(-1),
        2 => json!(1e308),
        3 => json!(-1e308),
        4 => json!(rng.random_range(-3.0..3.0)),
        5 => json!(rng.random_range(0..12u32)),
        6 => json!("x"),
        7 => Value::Null,
        _ => json!([]),
    }
}

/// Visits a random node of the tree and mutates it in place.
fn mutate<R: Rng + ?Sized>(v: &mut Value, rng: &mut R, depth: usize) {
    let descend = depth < 6 && rng.random_range(0..4u8) != 0;
    match v {
        Value::Object(map) if descend && !map.is_empty() => {
            let k = map.keys().nth(rng.random_range(0..map.len())).unwrap().clone();
            match rng.random_range(0..8u8) {
                0 => {
                    map.remove(&k);
                }
                1 => {
                    map.insert("unexpected".into(), random_scalar(rng));
                }
                _ => mutate(map.get_mut(&k).unwrap(), rng, depth + 1),
            }
        }
        Value::Array(a) if descend && !a.is_empty() => {
            let i = rng.random_range(0..a.len());
            match rng.random_range(0..8u8) {
                0 => {
                    a.remove(i);
                }
                1 => {
                    let dup = a[i].clone();
                    a.push(dup);
                }
                2 => {
                    let j = rng.random_range(0..a.len());
                    a.swap(i, j);
                }
                _ => mutate(&mut a[i], rng, depth + 1),
            }
        }
        Value::Number(n) if n.is_f64() || rng.random_bool(0.5) => {
            let x = n.as_f64().unwrap_or(0.0);
            *v = match rng.random_range(0..4u8) {
                0 => json!(-x),
                1 => json!(x * rng.random_range(-4.0..4.0)),
                2 => json!(x + 1.0),
                _ => random_scalar(rng),
            };
        }
        Value::Number(n) => {
            let x = n.as_u64().unwrap_or(0);
            *v = json!(match rng.random_range(0..3u8) {
                0 => x + 1,
                1 => x.saturating_sub(1),
                _ => rng.random_range(0..16),
            });
        }
        _ => *v = random_scalar(rng),
    }
}

/// Textual damage on top of structural mutation.
fn damage<R: Rng + ?Sized>(text: &str, rng: &mut R) -> String {
    let bytes = text.as_bytes();
    match rng.random_range(0..10u8) {
        0 => String::from_utf8_lossy(&bytes[..rng.random_range(0..=bytes.len())]).into_owned(),
        1 => {
            let mut b = bytes.to_vec();
            let i = rng.random_range(0..b.len());
            b[i] = rng.random_range(0x20..0x7f);
            String::from_utf8_lossy(&b).into_owned()
        }
        _ => text.to_owned(),
    }
}

/// Builder-only oracle: what the loader should decide for a document that
/// already has the right shape.
fn builders_accept(doc: &PackingDocument) -> bool {
    if doc.schema_version != SCHEMA_VERSION || doc.inversive_distances.iter().any(|e| e.edge[0] >= e.edge[1]) {
        return false;
    }
    let weights = doc
        .inversive_distances
        .iter()
        .map(|e| (Edge(e.edge[0], e.edge[1]), e.value));
    let Ok(c) = WeightedComplex::<f64>::new(doc.vertices, doc.faces.clone(), weights) else {
        return false;
    };
    let n = c.vertex_count();
    if let Some(r) = &doc.radii {
        if r.len() != n || PackingMetric::new(doc.geometry, r.clone()).is_err() {
            return false;
        }
    }
    if let Some(t) = &doc.target {
        if t.values().len() != n || t.values().iter().any(|x| !x.is_finite()) {
            return false;
        }
        if let TargetSpec::Alpha { alpha, .. } = t {
            if !alpha.is_finite() {
                return false;
            }
        }
    }
    true
}

#[test]
fn mutated_documents_never_panic() {
    let seeds = seed_documents();
    let (mut structural, mut accepted, mut agree) = (0usize, 0usize, 0usize);
    for k in 0..10_000 {
        let mut rng = sample_rng(4242, k);
        let mut v = seeds[k % seeds.len()].clone();
        for _ in 0..rng.random_range(1..4) {
            mutate(&mut v, &mut rng, 0);
        }
        let text = damage(&serde_json::to_string(&v).unwrap(), &mut rng);
        let loaded = catch_unwind(AssertUnwindSafe(|| parse_document(&text)))
            .unwrap_or_else(|_| panic!("loader panicked on document {k}: {text}"));
        if let Ok(doc) = serde_json::from_str::<PackingDocument>(&text) {
            structural += 1;
            let expected = catch_unwind(AssertUnwindSafe(|| builders_accept(&doc)))
                .unwrap_or_else(|_| panic!("builders panicked on document {k}"));
            assert_eq!(loaded.is_ok(), expected, "document {k}: {text}\n{loaded:?}");
            agree += 1;
        }
        accepted += usize::from(loaded.is_ok());
    }
    assert_eq!(structural, agree);
    // the mutation mix should exercise both outcomes
    assert!(structural > 500, "only {structural} structurally valid documents");
    assert!(accepted > 100, "only {accepted} accepted documents");
    assert!(accepted < 10_000);
}
