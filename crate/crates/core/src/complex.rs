//! Combinatorial surfaces, edge weights and packing metrics.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Undirected edge stored as a sorted vertex pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge(pub usize, pub usize);

impl Edge {
    pub fn new(a: usize, b: usize) -> Self {
        if a <= b {
            Edge(a, b)
        } else {
            Edge(b, a)
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.0, self.1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    Euclidean,
    Hyperbolic,
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Geometry::Euclidean => "euclidean",
            Geometry::Hyperbolic => "hyperbolic",
        })
    }
}

/// Inversive distances of one face; `w[a]` belongs to the edge opposite
/// local vertex `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceWeightTriple<T> {
    pub w: [T; 3],
}

impl<T: Real> FaceWeightTriple<T> {
    pub fn new(i_i: T, i_j: T, i_k: T) -> Self {
        Self { w: [i_i, i_j, i_k] }
    }

    /// `[γ_ijk, γ_jik, γ_kij]` where `γ_ijk = I_i + I_j I_k`.
    pub fn gammas(&self) -> [T; 3] {
        let [a, b, c] = self.w;
        [a + b * c, b + a * c, c + a * b]
    }

    pub fn satisfies_weight_condition(&self) -> bool {
        self.gammas().iter().all(|g| *g >= T::zero())
    }

    /// Rotates local labels so that position 0 becomes position `k`.
    pub fn rotated(&self, k: usize) -> Self {
        Self {
            w: [self.w[k % 3], self.w[(k + 1) % 3], self.w[(k + 2) % 3]],
        }
    }

    pub(crate) fn check_condition(&self, face: usize) -> Result<()> {
        if self.satisfies_weight_condition() {
            Ok(())
        } else {
            Err(Error::WeightConditionViolated {
                face,
                gammas: self.gammas().map(Real::to_f64_lossy),
            })
        }
    }
}

/// Closed triangulated surface carrying an inversive distance on every edge.
#[derive(Debug, Clone)]
pub struct WeightedComplex<T> {
    vertex_count: usize,
    faces: Vec<[usize; 3]>,
    edges: Vec<Edge>,
    weights: Vec<T>,
    face_edges: Vec<[usize; 3]>,
    edge_index: HashMap<Edge, usize>,
    euler_char: i64,
}

impl<T: Real> WeightedComplex<T> {
    /// Builds a complex on `vertex_count` vertices. Every vertex must be used
    /// and every edge must carry exactly one weight.
    pub fn new<W>(vertex_count: usize, faces: Vec<[usize; 3]>, weights: W) -> Result<Self>
    where
        W: IntoIterator<Item = (Edge, T)>,
    {
        if faces.is_empty() {
            return Err(Error::EmptyComplex);
        }
        let mut used = vec![false; vertex_count];
        let mut seen_faces: HashMap<[usize; 3], usize> = HashMap::new();
        for (f, tri) in faces.iter().enumerate() {
            for &v in tri {
                if v >= vertex_count {
                    return Err(Error::VertexOutOfRange {
                        face: f,
                        vertex: v,
                        vertex_count,
                    });
                }
                used[v] = true;
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::DegenerateFace {
                    face: f,
                    vertices: *tri,
                });
            }
            let mut key = *tri;
            key.sort_unstable();
            if let Some(&first) = seen_faces.get(&key) {
                return Err(Error::DuplicateFace { face: f, first });
            }
            seen_faces.insert(key, f);
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(Error::IsolatedVertex { vertex: v });
        }

        let mut edge_index: HashMap<Edge, usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut incidence = Vec::new();
        let mut face_edges = Vec::with_capacity(faces.len());
        for tri in &faces {
            let mut fe = [0usize; 3];
            for a in 0..3 {
                let e = Edge::new(tri[(a + 1) % 3], tri[(a + 2) % 3]);
                let idx = *edge_index.entry(e).or_insert_with(|| {
                    edges.push(e);
                    incidence.push(0usize);
                    edges.len() - 1
                });
                incidence[idx] += 1;
                fe[a] = idx;
            }
            face_edges.push(fe);
        }
        let mut bad: Vec<(Edge, usize)> = edges
            .iter()
            .zip(&incidence)
            .filter(|(_, &n)| n != 2)
            .map(|(e, &n)| (*e, n))
            .collect();
        bad.sort();
        if let Some(&(edge, count)) = bad.first() {
            return Err(Error::NonManifold { edge, count });
        }

        let mut slots: Vec<Option<T>> = vec![None; edges.len()];
        for (edge, value) in weights {
            let edge = Edge::new(edge.0, edge.1);
            let idx = *edge_index.get(&edge).ok_or(Error::UnknownEdge { edge })?;
            if slots[idx].is_some() {
                return Err(Error::DuplicateWeight { edge });
            }
            if !(value > -T::one()) || !value.is_finite() {
                return Err(Error::WeightOutOfRange {
                    edge,
                    value: value.to_f64_lossy(),
                });
            }
            slots[idx] = Some(value);
        }
        let mut weights = Vec::with_capacity(edges.len());
        let mut missing: Option<Edge> = None;
        for (slot, e) in slots.iter().zip(&edges) {
            match slot {
                Some(v) => weights.push(*v),
                None => {
                    missing = Some(missing.map_or(*e, |m: Edge| m.min(*e)));
                    weights.push(T::zero());
                }
            }
        }
        if let Some(edge) = missing {
            return Err(Error::MissingWeight { edge });
        }

        let euler_char = vertex_count as i64 - edges.len() as i64 + faces.len() as i64;
        assert_eq!(3 * faces.len(), 2 * edges.len());
        Ok(Self {
            vertex_count,
            faces,
            edges,
            weights,
            face_edges,
            edge_index,
            euler_char,
        })
    }

    /// Like [`WeightedComplex::new`] with the vertex count taken from the faces.
    pub fn from_faces<W>(faces: Vec<[usize; 3]>, weights: W) -> Result<Self>
    where
        W: IntoIterator<Item = (Edge, T)>,
    {
        let n = faces.iter().flatten().max().map_or(0, |m| m + 1);
        Self::new(n, faces, weights)
    }

    /// Same combinatorics with every weight set to `value`.
    pub fn uniform(vertex_count: usize, faces: Vec<[usize; 3]>, value: T) -> Result<Self> {
        let mut edges: Vec<Edge> = faces
            .iter()
            .flat_map(|t| [Edge::new(t[0], t[1]), Edge::new(t[1], t[2]), Edge::new(t[0], t[2])])
            .collect();
        edges.sort();
        edges.dedup();
        Self::new(vertex_count, faces, edges.into_iter().map(|e| (e, value)))
    }

    /// Replaces the weights, keeping the combinatorics.
    pub fn with_weights(&self, weights: Vec<T>) -> Result<Self> {
        if weights.len() != self.edges.len() {
            return Err(Error::DimensionMismatch {
                expected: self.edges.len(),
                actual: weights.len(),
            });
        }
        Self::new(
            self.vertex_count,
            self.faces.clone(),
            self.edges.iter().copied().zip(weights),
        )
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Weights aligned with [`WeightedComplex::edges`].
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn weight(&self, edge: Edge) -> Option<T> {
        self.edge_index
            .get(&Edge::new(edge.0, edge.1))
            .map(|&i| self.weights[i])
    }

    pub fn edge_id(&self, edge: Edge) -> Option<usize> {
        self.edge_index.get(&Edge::new(edge.0, edge.1)).copied()
    }

    /// Edge indices opposite each local vertex of face `f`.
    pub fn face_edges(&self, f: usize) -> [usize; 3] {
        self.face_edges[f]
    }

    pub fn face_weights(&self, f: usize) -> FaceWeightTriple<T> {
        let fe = self.face_edges[f];
        FaceWeightTriple {
            w: fe.map(|e| self.weights[e]),
        }
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.euler_char
    }

    pub fn vertex_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.vertex_count];
        for e in &self.edges {
            deg[e.0] += 1;
            deg[e.1] += 1;
        }
        deg
    }

    pub fn validate_weight_condition(&self) -> WeightConditionReport<T> {
        let faces = (0..self.faces.len())
            .map(|f| {
                let gammas = self.face_weights(f).gammas();
                FaceGammas {
                    face: f,
                    gammas,
                    pass: gammas.iter().all(|g| *g >= T::zero()),
                }
            })
            .collect();
        WeightConditionReport { faces }
    }

    /// First face violating the weight condition, as an error.
    pub fn require_weight_condition(&self) -> Result<()> {
        for f in 0..self.faces.len() {
            self.face_weights(f).check_condition(f)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaceGammas<T> {
    pub face: usize,
    /// `[γ_ijk, γ_jik, γ_kij]` in the face's vertex order.
    pub gammas: [T; 3],
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightConditionReport<T> {
    pub faces: Vec<FaceGammas<T>>,
}

impl<T: Real> WeightConditionReport<T> {
    pub fn passes(&self) -> bool {
        self.faces.iter().all(|f| f.pass)
    }

    pub fn failing(&self) -> impl Iterator<Item = &FaceGammas<T>> {
        self.faces.iter().filter(|f| !f.pass)
    }
}

/// Radii on the vertices of a complex together with the background geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct PackingMetric<T> {
    geometry: Geometry,
    radii: Vec<T>,
}

impl<T: Real> PackingMetric<T> {
    pub fn new(geometry: Geometry, radii: Vec<T>) -> Result<Self> {
        for (i, r) in radii.iter().enumerate() {
            if !(*r > T::zero()) || !r.is_finite() {
                return Err(Error::InvalidRadius {
                    vertex: i,
                    value: r.to_f64_lossy(),
                });
            }
        }
        Ok(Self { geometry, radii })
    }

    pub fn from_u(geometry: Geometry, u: &[T]) -> Result<Self> {
        let radii = u
            .iter()
            .enumerate()
            .map(|(i, &ui)| u_to_radius(geometry, ui).ok_or(i))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|vertex| Error::UDomainViolation {
                vertex,
                value: u[vertex].to_f64_lossy(),
            })?;
        Self::new(geometry, radii)
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn radii(&self) -> &[T] {
        &self.radii
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn to_u(&self) -> Vec<T> {
        self.radii.iter().map(|&r| radius_to_u(self.geometry, r)).collect()
    }

    /// `s_i = r_i` (Euclidean) or `tanh(r_i / 2)` (hyperbolic); equal to `e^{u_i}`.
    pub fn s(&self) -> Vec<T> {
        self.radii
            .iter()
            .map(|&r| match self.geometry {
                Geometry::Euclidean => r,
                Geometry::Hyperbolic => (r / T::lit(2.0)).tanh(),
            })
            .collect()
    }
}

pub fn radius_to_u<T: Real>(geometry: Geometry, r: T) -> T {
    match geometry {
        Geometry::Euclidean => r.ln(),
        Geometry::Hyperbolic => {
            // ln tanh(r/2) = ln(1 - e^{-r}) - ln(1 + e^{-r})
            let q = (-r).exp();
            (-q).ln_1p() - q.ln_1p()
        }
    }
}

/// Inverse of [`radius_to_u`]; `None` outside the u-domain.
pub fn u_to_radius<T: Real>(geometry: Geometry, u: T) -> Option<T> {
    if !u.is_finite() {
        return None;
    }
    match geometry {
        Geometry::Euclidean => Some(u.exp()).filter(|r| *r > T::zero() && r.is_finite()),
        Geometry::Hyperbolic => {
            if u >= T::zero() {
                return None;
            }
            // 2 atanh(e^u) = ln(1 + e^u) - ln(1 - e^u)
            let r = u.exp().ln_1p() - (-u.exp_m1()).ln();
            Some(r).filter(|r| *r > T::zero() && r.is_finite())
        }
    }
}
