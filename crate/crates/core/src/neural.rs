//! The embedding substrate mirroring the symbolic store.
//!
//! Every concept-in-domain, relation, and domain carries a vector. A relation
//! applied in a domain acts on concept vectors through the rank-1 map
//! `x ↦ h_r ⟨h_d, x⟩`, whose largest singular value is exactly
//! `‖h_r‖·‖h_d‖`; keeping that product below one makes every edge map a
//! strict contraction, which is what lets repeated propagation settle instead
//! of oscillating. `spectral_normalize` enforces the bound; `fixed_point`
//! iterates propagation to convergence and says honestly when it diverged.
//!
//! All randomness is seeded per entity name, so vector assignment does not
//! depend on iteration or insertion order and identical inputs reproduce
//! identical outputs byte for byte.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::domain::{DomainPath, DomainUniverse};
use crate::error::{Error, Result};
use crate::store::FiberStore;

/// Stable 64-bit FNV-1a. Hand-rolled because the standard hasher does not
/// promise stability across releases, and embedding assignment must.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Dot product; panics are avoided by construction (dims checked at entry).
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Cosine similarity, zero when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot(a, b) / (na * nb)
    }
}

#[derive(Clone, Debug)]
pub struct EmbeddingConfig {
    pub dim: usize,
    pub seed: u64,
    /// Norm given to every domain vector.
    pub domain_norm: f64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            dim: 16,
            seed: 0,
            domain_norm: 0.9,
        }
    }
}

/// Vector tables for concepts-in-domains, relations, and domains.
#[derive(Clone, Debug)]
pub struct EmbeddingStore {
    dim: usize,
    seed: u64,
    domain_norm: f64,
    concepts: BTreeMap<(String, DomainPath), Vec<f64>>,
    relations: BTreeMap<String, Vec<f64>>,
    domains: BTreeMap<DomainPath, Vec<f64>>,
}

impl EmbeddingStore {
    pub fn new(config: EmbeddingConfig) -> Result<Self> {
        if config.dim < 2 {
            return Err(Error::InvalidConfig(format!(
                "embedding dimension must be at least 2, got {}",
                config.dim
            )));
        }
        if !(config.domain_norm.is_finite() && config.domain_norm > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "domain vector norm must be positive and finite, got {}",
                config.domain_norm
            )));
        }
        Ok(EmbeddingStore {
            dim: config.dim,
            seed: config.seed,
            domain_norm: config.domain_norm,
            concepts: BTreeMap::new(),
            relations: BTreeMap::new(),
            domains: BTreeMap::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn rng_for(&self, kind: &str, name: &str) -> ChaCha8Rng {
        let tag = fnv1a(format!("{kind}\u{1}{name}").as_bytes());
        ChaCha8Rng::seed_from_u64(self.seed ^ tag)
    }

    fn sample(&self, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Vec<f64> {
        (0..self.dim).map(|_| rng.random_range(lo..hi)).collect()
    }

    /// Registers every concept-in-domain, relation, and populated domain the
    /// store mentions. Idempotent; existing vectors are kept.
    pub fn init_from_store(&mut self, store: &FiberStore) {
        for d in store.populated_domains() {
            self.ensure_domain(&d);
            for c in store.concepts_in(&d) {
                self.ensure_concept(&c, &d);
            }
            for t in store.fiber(&d) {
                self.ensure_relation(&t.relation);
            }
        }
    }

    pub fn ensure_domain(&mut self, d: &DomainPath) {
        if !self.domains.contains_key(d) {
            let mut rng = self.rng_for("domain", &d.to_string());
            let mut v = self.sample(&mut rng, -1.0, 1.0);
            let n = norm(&v);
            let scale = if n == 0.0 { 0.0 } else { self.domain_norm / n };
            for x in &mut v {
                *x *= scale;
            }
            self.domains.insert(d.clone(), v);
        }
    }

    pub fn ensure_concept(&mut self, concept: &str, domain: &DomainPath) {
        let key = (concept.to_owned(), domain.clone());
        if !self.concepts.contains_key(&key) {
            let mut rng = self.rng_for("concept", &format!("{concept}\u{1}{domain}"));
            let v = self.sample(&mut rng, -0.5, 0.5);
            self.concepts.insert(key, v);
        }
    }

    pub fn ensure_relation(&mut self, relation: &str) {
        if !self.relations.contains_key(relation) {
            let mut rng = self.rng_for("relation", relation);
            let v = self.sample(&mut rng, -0.5, 0.5);
            self.relations.insert(relation.to_owned(), v);
        }
    }

    /// Re-samples every concept vector from a different seed while leaving
    /// relation and domain vectors alone. Lets convergence be probed from
    /// independent starting points under identical edge maps.
    pub fn reseed_concepts(&mut self, seed: u64) {
        let keys: Vec<(String, DomainPath)> = self.concepts.keys().cloned().collect();
        for (concept, domain) in keys {
            let tag = fnv1a(format!("concept\u{1}{concept}\u{1}{domain}").as_bytes());
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ tag);
            let v = self.sample(&mut rng, -0.5, 0.5);
            self.concepts.insert((concept, domain), v);
        }
    }

    /// Pins a concept vector directly, replacing any sampled one. How
    /// external signals (anchor terms, pretrained vectors) enter the table.
    pub fn set_concept(&mut self, concept: &str, domain: &DomainPath, v: Vec<f64>) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteValue(format!(
                "pinned vector for {concept} in {domain}"
            )));
        }
        self.concepts.insert((concept.to_owned(), domain.clone()), v);
        Ok(())
    }

    pub fn concept(&self, concept: &str, domain: &DomainPath) -> Result<&[f64]> {
        self.concepts
            .get(&(concept.to_owned(), domain.clone()))
            .map(Vec::as_slice)
            .ok_or_else(|| Error::MissingEmbeddings(format!("concept {concept} in {domain}")))
    }

    /// Pins a domain vector directly, same contract as `set_concept`.
    pub fn set_domain(&mut self, domain: &DomainPath, v: Vec<f64>) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteValue(format!("pinned vector for domain {domain}")));
        }
        self.domains.insert(domain.clone(), v);
        Ok(())
    }

    pub fn relation_vector(&self, relation: &str) -> Result<&[f64]> {
        self.relations
            .get(relation)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::MissingEmbeddings(format!("relation {relation}")))
    }

    /// Pins a relation vector directly, same contract as `set_concept`.
    pub fn set_relation(&mut self, relation: &str, v: Vec<f64>) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteValue(format!(
                "pinned vector for relation {relation}"
            )));
        }
        self.relations.insert(relation.to_owned(), v);
        Ok(())
    }

    /// Rescales every relation vector in place. A factor above one widens the
    /// spread of the rank-1 contraction bounds, which is how the unnormalized
    /// condition of the convergence study reaches bounds on both sides of one.
    pub fn scale_relations(&mut self, factor: f64) -> Result<()> {
        if !factor.is_finite() {
            return Err(Error::NonFiniteValue("relation scale factor".to_owned()));
        }
        for v in self.relations.values_mut() {
            for x in v.iter_mut() {
                *x *= factor;
            }
        }
        Ok(())
    }

    pub fn domain_vector(&self, domain: &DomainPath) -> Result<&[f64]> {
        self.domains
            .get(domain)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::MissingEmbeddings(format!("domain {domain}")))
    }

    pub fn concept_count(&self) -> usize {
        self.concepts.len()
    }

    pub fn relation_names(&self) -> impl Iterator<Item = &str> {
        self.relations.keys().map(String::as_str)
    }

    /// The rank-1 edge map: `h_r · ⟨h_d, x⟩`.
    pub fn apply(&self, relation: &str, domain: &DomainPath, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        let hr = self.relation_vector(relation)?;
        let hd = self.domain_vector(domain)?;
        let scale = dot(hd, x);
        Ok(hr.iter().map(|r| r * scale).collect())
    }

    /// The edge map's largest singular value, `‖h_r‖·‖h_d‖`. Strictly below
    /// one means the map contracts.
    pub fn contraction_bound(&self, relation: &str, domain: &DomainPath) -> Result<f64> {
        Ok(norm(self.relation_vector(relation)?) * norm(self.domain_vector(domain)?))
    }

    /// Every contraction bound for the (relation, domain) pairs the store
    /// actually uses, plus whether all of them sit strictly below one.
    pub fn contraction_check(&self, store: &FiberStore) -> Result<ContractionReport> {
        let pairs: BTreeSet<(String, DomainPath)> = store
            .all_triples()
            .map(|t| (t.relation.clone(), t.domain.clone()))
            .collect();
        let mut products = Vec::new();
        let mut all_contractive = true;
        for (relation, domain) in pairs {
            let product = self.contraction_bound(&relation, &domain)?;
            all_contractive &= product < 1.0;
            products.push(ContractionEntry {
                relation,
                domain,
                product,
            });
        }
        Ok(ContractionReport {
            products,
            all_contractive,
        })
    }

    /// Domain-conditioned concept embedding: the elementwise product of the
    /// concept vector with its domain vector, scaled to unit length. A zero
    /// product stays the zero vector, which downstream similarity treats as
    /// matching nothing.
    pub fn embed_concept(&self, concept: &str, domain: &DomainPath) -> Result<Vec<f64>> {
        let hc = self.concept(concept, domain)?;
        let hd = self.domain_vector(domain)?;
        let mut v: Vec<f64> = hc.iter().zip(hd).map(|(c, d)| c * d).collect();
        let n = norm(&v);
        if n > 0.0 {
            for x in &mut v {
                *x /= n;
            }
        }
        Ok(v)
    }

    /// Rescales relation vectors whose worst contraction bound over all known
    /// domains exceeds `target`, landing them exactly on it. Already-compliant
    /// relations are left untouched. Returns before/after bounds per relation.
    pub fn spectral_normalize(&mut self, target: f64) -> Result<SpectralReport> {
        if !(target.is_finite() && target > 0.0 && target < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "spectral target must lie strictly inside (0, 1), got {target}"
            )));
        }
        let max_domain_norm = self
            .domains
            .values()
            .map(|v| norm(v))
            .fold(0.0, f64::max);
        if max_domain_norm == 0.0 {
            return Err(Error::MissingEmbeddings(
                "no domain vectors to normalize against".into(),
            ));
        }
        let mut entries = Vec::new();
        for (name, hr) in &mut self.relations {
            let before = norm(hr) * max_domain_norm;
            if before > target {
                let scale = target / before;
                for x in hr.iter_mut() {
                    *x *= scale;
                }
            }
            entries.push(SpectralEntry {
                relation: name.clone(),
                bound_before: before,
                bound_after: norm(hr) * max_domain_norm,
            });
        }
        Ok(SpectralReport { target, entries })
    }
}

/// One (relation, domain) pair's exact spectral radius.
#[derive(Clone, Debug, serde::Serialize)]
pub struct ContractionEntry {
    pub relation: String,
    pub domain: DomainPath,
    pub product: f64,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct ContractionReport {
    pub products: Vec<ContractionEntry>,
    pub all_contractive: bool,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct SpectralEntry {
    pub relation: String,
    pub bound_before: f64,
    pub bound_after: f64,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct SpectralReport {
    pub target: f64,
    pub entries: Vec<SpectralEntry>,
}

/// Elementwise nonlinearity applied after aggregation. Any choice here moves
/// points no further apart than its input does and fixes zero, so the
/// contraction argument survives it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    /// No nonlinearity; propagation is exactly the linear edge maps.
    #[default]
    Identity,
    /// Hyperbolic tangent, for bounded propagation.
    Tanh,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Tanh => x.tanh(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct FixedPointConfig {
    pub epsilon: f64,
    pub max_iterations: usize,
    pub activation: Activation,
    /// Also re-estimate relation vectors each sweep (midpoint of endpoint
    /// vectors, renormalized to keep the contraction budget).
    pub update_relations: bool,
    /// Cap applied to relation vector norms when `update_relations` is on.
    pub relation_norm_cap: f64,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        FixedPointConfig {
            epsilon: 1e-6,
            max_iterations: 1000,
            activation: Activation::Identity,
            update_relations: true,
            relation_norm_cap: 0.95 / 0.9,
        }
    }
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct ConvergenceReport {
    pub iterations: usize,
    pub converged: bool,
    pub final_delta: f64,
    /// Largest absolute concept coordinate at the end, as divergence evidence.
    pub max_coordinate: f64,
    /// Spectral radius of every edge map the store exercises: exact rank-1
    /// products normally, power-iteration estimates under the dense hook.
    pub contraction_products: Vec<ContractionEntry>,
    /// Observed contraction rate: geometric mean of successive delta ratios
    /// over the trajectory tail. At most the largest product when every
    /// product sits below one; above one it quantifies the blow-up.
    pub estimated_lambda: f64,
    /// Per-sweep deltas.
    pub trajectory: Vec<f64>,
}

/// Iterates propagation to a fixed point. Each sweep recomputes every concept
/// vector as the mean of its incoming edge maps applied to their source
/// vectors, passed through the configured activation; edges count as incoming
/// for a concept-in-domain when their own domain sits at or below it, so
/// specific evidence feeds general representations but not the reverse.
/// Relation vectors then move to the mean endpoint midpoint of their edges,
/// renormalized to the contraction budget (when enabled). Concepts with no
/// incoming edges anchor in place. Stops when the largest per-sweep change
/// drops below `epsilon`; reports non-convergence after `max_iterations`;
/// errors only if values stop being finite.
pub fn fixed_point(
    embeddings: &mut EmbeddingStore,
    store: &FiberStore,
    universe: &DomainUniverse,
    config: &FixedPointConfig,
) -> Result<ConvergenceReport> {
    run_sweeps(embeddings, store, universe, config, None)
}

/// Same sweep loop but with dense relation matrices instead of the rank-1
/// maps, for probing what happens when contraction is deliberately broken.
/// Relation and domain vectors are ignored; only concept vectors move.
pub fn fixed_point_dense(
    embeddings: &mut EmbeddingStore,
    store: &FiberStore,
    universe: &DomainUniverse,
    maps: &DenseMaps,
    config: &FixedPointConfig,
) -> Result<ConvergenceReport> {
    if maps.dim != embeddings.dim {
        return Err(Error::DimensionMismatch {
            expected: embeddings.dim,
            found: maps.dim,
        });
    }
    run_sweeps(embeddings, store, universe, config, Some(maps))
}

fn run_sweeps(
    embeddings: &mut EmbeddingStore,
    store: &FiberStore,
    universe: &DomainUniverse,
    config: &FixedPointConfig,
    dense: Option<&DenseMaps>,
) -> Result<ConvergenceReport> {
    // Which fibers feed each embedded domain: those at or below it.
    let embedded: BTreeSet<DomainPath> =
        embeddings.concepts.keys().map(|(_, d)| d.clone()).collect();
    let populated = store.populated_domains();
    let mut feeders: BTreeMap<DomainPath, Vec<DomainPath>> = BTreeMap::new();
    for d in &embedded {
        let mut list = Vec::new();
        for f in &populated {
            if universe.leq(f, d)? {
                list.push(f.clone());
            }
        }
        feeders.insert(d.clone(), list);
    }

    let mut trajectory = Vec::new();
    let finish = |iterations: usize,
                      converged: bool,
                      trajectory: Vec<f64>,
                      embeddings: &EmbeddingStore|
     -> Result<ConvergenceReport> {
        Ok(ConvergenceReport {
            iterations,
            converged,
            final_delta: trajectory.last().copied().unwrap_or(0.0),
            max_coordinate: max_coordinate(embeddings),
            contraction_products: collect_products(embeddings, store, dense)?,
            estimated_lambda: estimate_lambda(&trajectory),
            trajectory,
        })
    };

    for sweep in 0..config.max_iterations {
        let mut delta: f64 = 0.0;
        let mut next: BTreeMap<(String, DomainPath), Vec<f64>> = BTreeMap::new();
        for ((concept, domain), current) in &embeddings.concepts {
            let mut acc = vec![0.0; embeddings.dim];
            let mut used = 0usize;
            for fd in &feeders[domain] {
                for t in store.fiber(fd) {
                    if t.target != *concept {
                        continue;
                    }
                    let Ok(src) = embeddings.concept(&t.source, fd) else {
                        continue;
                    };
                    let mapped = match dense {
                        Some(maps) => maps.apply(&t.relation, src)?,
                        None => embeddings.apply(&t.relation, fd, src)?,
                    };
                    for (a, m) in acc.iter_mut().zip(&mapped) {
                        *a += m;
                    }
                    used += 1;
                }
            }
            if used == 0 {
                continue;
            }
            for a in &mut acc {
                *a = config.activation.apply(*a / used as f64);
                if !a.is_finite() {
                    return Err(Error::NonFiniteValue(format!(
                        "concept vector for {concept} in {domain} left the finite range at sweep {sweep}"
                    )));
                }
            }
            delta = delta.max(sup_distance(current, &acc));
            next.insert((concept.clone(), domain.clone()), acc);
        }
        for (key, v) in next {
            embeddings.concepts.insert(key, v);
        }

        if config.update_relations && dense.is_none() {
            let mut sums: BTreeMap<String, (Vec<f64>, usize)> = BTreeMap::new();
            for t in store.all_triples() {
                let (Ok(src), Ok(tgt)) = (
                    embeddings.concept(&t.source, &t.domain),
                    embeddings.concept(&t.target, &t.domain),
                ) else {
                    continue;
                };
                let entry = sums
                    .entry(t.relation.clone())
                    .or_insert_with(|| (vec![0.0; embeddings.dim], 0));
                for ((a, s), g) in entry.0.iter_mut().zip(src).zip(tgt) {
                    *a += (s + g) / 2.0;
                }
                entry.1 += 1;
            }
            for (rel, (mut sum, count)) in sums {
                for x in &mut sum {
                    *x /= count as f64;
                }
                let n = norm(&sum);
                if n > config.relation_norm_cap {
                    let scale = config.relation_norm_cap / n;
                    for x in &mut sum {
                        *x *= scale;
                    }
                }
                if let Some(old) = embeddings.relations.get(&rel) {
                    delta = delta.max(sup_distance(old, &sum));
                }
                embeddings.relations.insert(rel, sum);
            }
        }

        trajectory.push(delta);
        if delta < config.epsilon {
            return finish(sweep + 1, true, trajectory, embeddings);
        }
    }
    finish(config.max_iterations, false, trajectory, embeddings)
}

fn collect_products(
    embeddings: &EmbeddingStore,
    store: &FiberStore,
    dense: Option<&DenseMaps>,
) -> Result<Vec<ContractionEntry>> {
    match dense {
        None => Ok(embeddings.contraction_check(store)?.products),
        Some(maps) => {
            let pairs: BTreeSet<(String, DomainPath)> = store
                .all_triples()
                .map(|t| (t.relation.clone(), t.domain.clone()))
                .collect();
            Ok(pairs
                .into_iter()
                .map(|(relation, domain)| {
                    let product = maps.spectral_radius(&relation).unwrap_or(0.0);
                    ContractionEntry {
                        relation,
                        domain,
                        product,
                    }
                })
                .collect())
        }
    }
}

/// Geometric mean of successive delta ratios over the last ten sweeps with
/// nonzero movement; zero when fewer than two such sweeps exist.
fn estimate_lambda(trajectory: &[f64]) -> f64 {
    let ratios: Vec<f64> = trajectory
        .windows(2)
        .filter(|w| w[0] > 0.0 && w[1] > 0.0 && w[0].is_finite() && w[1].is_finite())
        .map(|w| w[1] / w[0])
        .collect();
    if ratios.is_empty() {
        return 0.0;
    }
    let tail = &ratios[ratios.len().saturating_sub(10)..];
    let log_sum: f64 = tail.iter().map(|r| r.ln()).sum();
    (log_sum / tail.len() as f64).exp()
}

fn max_coordinate(embeddings: &EmbeddingStore) -> f64 {
    embeddings
        .concepts
        .values()
        .flat_map(|v| v.iter())
        .map(|x| x.abs())
        .fold(0.0, f64::max)
}

/// Dense square relation matrices scaled to a chosen spectral radius, the
/// control condition against the rank-1 contraction maps.
#[derive(Clone, Debug)]
pub struct DenseMaps {
    dim: usize,
    maps: BTreeMap<String, Vec<f64>>,
}

impl DenseMaps {
    /// Builds one random dense matrix per relation, rescaled so the estimated
    /// spectral radius is `radius`. Estimation runs normalized power
    /// iteration long enough for the geometric growth rate to stabilize.
    pub fn random_with_radius(
        relations: &[&str],
        dim: usize,
        radius: f64,
        seed: u64,
    ) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidConfig(format!(
                "dense maps need dimension at least 2, got {dim}"
            )));
        }
        let mut maps = BTreeMap::new();
        for rel in relations {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(rel.as_bytes()));
            let mut m: Vec<f64> = (0..dim * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let rho = estimate_spectral_radius(&m, dim, &mut rng);
            if rho == 0.0 {
                return Err(Error::NonFiniteValue(format!(
                    "degenerate random matrix for relation {rel}"
                )));
            }
            let scale = radius / rho;
            for x in &mut m {
                *x *= scale;
            }
            maps.insert((*rel).to_owned(), m);
        }
        Ok(DenseMaps { dim, maps })
    }

    pub fn apply(&self, relation: &str, x: &[f64]) -> Result<Vec<f64>> {
        let m = self
            .maps
            .get(relation)
            .ok_or_else(|| Error::MissingEmbeddings(format!("dense map for {relation}")))?;
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok((0..self.dim)
            .map(|i| dot(&m[i * self.dim..(i + 1) * self.dim], x))
            .collect())
    }

    pub fn spectral_radius(&self, relation: &str) -> Option<f64> {
        let m = self.maps.get(relation)?;
        let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
        Some(estimate_spectral_radius(m, self.dim, &mut rng))
    }
}

/// Growth-rate estimate of the dominant eigenvalue magnitude: iterate, renorm
/// every step, average the log gains over the tail. Robust to complex
/// dominant pairs, which plain power iteration oscillates on.
fn estimate_spectral_radius(m: &[f64], dim: usize, rng: &mut ChaCha8Rng) -> f64 {
    let mut x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let n = norm(&x);
    if n == 0.0 {
        return 0.0;
    }
    for v in &mut x {
        *v /= n;
    }
    let mut log_gain_sum = 0.0;
    let mut counted = 0usize;
    for step in 0..600 {
        let y: Vec<f64> = (0..dim).map(|i| dot(&m[i * dim..(i + 1) * dim], &x)).collect();
        let ny = norm(&y);
        if ny == 0.0 || !ny.is_finite() {
            return 0.0;
        }
        if step >= 100 {
            log_gain_sum += ny.ln();
            counted += 1;
        }
        x = y.into_iter().map(|v| v / ny).collect();
    }
    (log_gain_sum / counted as f64).exp()
}
