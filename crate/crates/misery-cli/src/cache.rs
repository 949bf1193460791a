//! Embedding cache: a shared map keyed by (provider id, record id)
//! with atomic get-or-compute semantics, persisted as a JSON sidecar
//! so remote embeddings are fetched once per dataset.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Mutex;

use misery_core::dataset::MiseryRecord;
use misery_core::embed::{EmbedError, Embedder, EmbeddingVector};

use crate::files;
use crate::{CliError, Result};

type Entries = BTreeMap<String, BTreeMap<String, Vec<f64>>>;

/// Provider-keyed vector store. The lock is held across computes, so
/// concurrent requests for one key yield exactly one stored value.
#[derive(Debug, Default)]
pub struct EmbeddingCache {
    entries: Mutex<Entries>,
}

impl EmbeddingCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Loads a sidecar file; a missing file is an empty cache.
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Ok(Self::new());
        }
        let entries: Entries = files::load_json(path)?;
        Ok(Self {
            entries: Mutex::new(entries),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let entries = self.lock();
        files::save_json(path, &*entries)
    }

    pub fn len(&self) -> usize {
        self.lock().values().map(|m| m.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, provider: &str, record_id: u64) -> Option<EmbeddingVector> {
        self.lock()
            .get(provider)?
            .get(&record_id.to_string())
            .map(|values| EmbeddingVector::new(values.clone()))
    }

    pub fn insert(&self, provider: &str, record_id: u64, vector: &EmbeddingVector) {
        self.lock()
            .entry(provider.to_string())
            .or_default()
            .insert(record_id.to_string(), vector.values().to_vec());
    }

    /// Returns the cached vector or computes, stores, and returns it.
    /// The cache lock is held across the compute.
    pub fn get_or_compute(
        &self,
        embedder: &dyn Embedder,
        record: &MiseryRecord,
    ) -> std::result::Result<EmbeddingVector, EmbedError> {
        let provider = embedder.id();
        let mut entries = self.lock();
        let per_provider = entries.entry(provider).or_default();
        if let Some(values) = per_provider.get(&record.id.to_string()) {
            return Ok(EmbeddingVector::new(values.clone()));
        }
        let vector = embed_one(embedder, &record.statement)?;
        per_provider.insert(record.id.to_string(), vector.values().to_vec());
        Ok(vector)
    }

    /// Ensures every record has a cached vector, batching the misses
    /// into one provider call. Returns the full id-to-vector map.
    pub fn warm(
        &self,
        embedder: &dyn Embedder,
        records: &[MiseryRecord],
    ) -> std::result::Result<BTreeMap<u64, EmbeddingVector>, EmbedError> {
        let provider = embedder.id();
        let mut entries = self.lock();
        let per_provider = entries.entry(provider).or_default();

        let missing: Vec<&MiseryRecord> = records
            .iter()
            .filter(|r| !per_provider.contains_key(&r.id.to_string()))
            .collect();
        if !missing.is_empty() {
            let texts: Vec<&str> = missing.iter().map(|r| r.statement.as_str()).collect();
            let vectors = embedder.embed(&texts)?;
            if vectors.len() != missing.len() {
                return Err(EmbedError::Provider(format!(
                    "asked for {} vectors, got {}",
                    missing.len(),
                    vectors.len()
                )));
            }
            for (record, vector) in missing.iter().zip(&vectors) {
                per_provider.insert(record.id.to_string(), vector.values().to_vec());
            }
        }

        let mut out = BTreeMap::new();
        for record in records {
            let values = per_provider
                .get(&record.id.to_string())
                .expect("just inserted or already present");
            out.insert(record.id, EmbeddingVector::new(values.clone()));
        }
        Ok(out)
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Entries> {
        self.entries.lock().expect("embedding cache lock")
    }
}

fn embed_one(
    embedder: &dyn Embedder,
    text: &str,
) -> std::result::Result<EmbeddingVector, EmbedError> {
    embedder
        .embed(&[text])?
        .pop()
        .ok_or_else(|| EmbedError::Provider("empty batch reply".into()))
}

/// Convenience for the bench runner: warm through a cache when one is
/// configured, or embed directly.
pub fn pool_embeddings(
    embedder: &dyn Embedder,
    records: &[MiseryRecord],
    cache: Option<(&EmbeddingCache, &Path)>,
) -> Result<BTreeMap<u64, EmbeddingVector>> {
    match cache {
        Some((cache, sidecar)) => {
            let map = cache.warm(embedder, records)?;
            cache.save(sidecar)?;
            Ok(map)
        }
        None => {
            let texts: Vec<&str> = records.iter().map(|r| r.statement.as_str()).collect();
            let vectors = embedder.embed(&texts)?;
            if vectors.len() != records.len() {
                return Err(CliError::Embed(EmbedError::Provider(format!(
                    "asked for {} vectors, got {}",
                    records.len(),
                    vectors.len()
                ))));
            }
            Ok(records
                .iter()
                .zip(vectors)
                .map(|(r, v)| (r.id, v))
                .collect())
        }
    }
}
