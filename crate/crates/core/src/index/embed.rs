//! Pluggable text embedders.
//!
//! The bundled `HashEmbedder` is a seeded pseudo-random projection: equal
//! text always yields the same vector, and texts sharing tokens land closer
//! together than unrelated ones. It exists so ingestion, retrieval, and the
//! whole test suite run without a model backend; production deployments
//! plug in a real encoder behind the same trait.

use super::{Embedding, IndexError, DEFAULT_DIM};

/// A deterministic text-to-vector backend.
pub trait Embedder: Send + Sync {
    /// Stable identity string, recorded in checkpoint manifests.
    fn identity(&self) -> String;

    fn dimension(&self) -> usize;

    /// Embed one text. Implementations need not normalize; callers go
    /// through [`embed_and_normalize`].
    fn embed(&self, text: &str) -> Result<Embedding, IndexError>;
}

/// Embed and L2-normalize, rejecting texts that are empty after trimming.
pub fn embed_and_normalize(embedder: &dyn Embedder, text: &str) -> Result<Embedding, IndexError> {
    if text.trim().is_empty() {
        return Err(IndexError::EmptyText);
    }
    let raw = embedder.embed(text)?;
    if raw.dim() != embedder.dimension() {
        return Err(IndexError::DimensionMismatch {
            got: raw.dim(),
            want: embedder.dimension(),
        });
    }
    Ok(raw.normalized())
}

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Seeded pseudo-random projection embedder.
///
/// Tokenizes on non-alphanumerics, hashes each lowercased token, and
/// accumulates one splitmix-derived pseudo-random direction per token.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dim: usize,
    seed: u64,
}

impl HashEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        Self { dim, seed }
    }
}

impl Default for HashEmbedder {
    fn default() -> Self {
        Self::new(DEFAULT_DIM, 0x6d656d6f_69722d31) // fixed default seed
    }
}

impl Embedder for HashEmbedder {
    fn identity(&self) -> String {
        format!("hash-embedder-v1/d{}/s{:016x}", self.dim, self.seed)
    }

    fn dimension(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Embedding, IndexError> {
        let trimmed = text.trim();
        if trimmed.is_empty() {
            return Err(IndexError::EmptyText);
        }
        let tokens: Vec<String> = crate::text::tokens(trimmed);
        let mut acc = vec![0.0f64; self.dim];
        let mut mix = |token: &str, acc: &mut [f64]| {
            let mut state = self.seed ^ fnv1a(token.as_bytes());
            for slot in acc.iter_mut() {
                let z = splitmix64(&mut state);
                // Map the top 53 bits into [-1, 1).
                *slot += ((z >> 11) as f64 / (1u64 << 52) as f64) - 1.0;
            }
        };
        if tokens.is_empty() {
            // No alphanumeric content: hash the raw trimmed text once.
            mix(trimmed, &mut acc);
        } else {
            for token in &tokens {
                mix(token, &mut acc);
            }
        }
        Ok(Embedding(acc))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_norm_contract() {
        let e = HashEmbedder::default();
        for text in ["hello", "a longer sentence with words", "7"] {
            let v = embed_and_normalize(&e, text).unwrap();
            assert!((v.norm() - 1.0).abs() < 1e-6, "norm for {text:?}");
        }
    }

    #[test]
    fn deterministic() {
        let e = HashEmbedder::default();
        let a = embed_and_normalize(&e, "same text").unwrap();
        let b = embed_and_normalize(&e, "same text").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn distinct_texts_differ() {
        // Oracle for the projection: distinct tokens hash to distinct
        // streams, so "a" and "b" cannot collide.
        let e = HashEmbedder::default();
        let a = embed_and_normalize(&e, "a").unwrap();
        let b = embed_and_normalize(&e, "b").unwrap();
        assert_ne!(a, b);
        assert!(a.dot(&b).abs() < 0.5, "unrelated tokens stay far apart");
    }

    #[test]
    fn token_overlap_raises_similarity() {
        let e = HashEmbedder::default();
        let a = embed_and_normalize(&e, "melanie plays violin at school").unwrap();
        let b = embed_and_normalize(&e, "melanie plays violin at home").unwrap();
        let c = embed_and_normalize(&e, "quarterly finance report numbers").unwrap();
        assert!(a.dot(&b) > 0.6);
        assert!(a.dot(&b) > a.dot(&c));
    }

    #[test]
    fn empty_text_rejected() {
        let e = HashEmbedder::default();
        assert!(matches!(
            embed_and_normalize(&e, "   "),
            Err(IndexError::EmptyText)
        ));
    }

    #[test]
    fn punctuation_only_text_still_embeds() {
        let e = HashEmbedder::default();
        let v = embed_and_normalize(&e, "!!!").unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn values_are_f32_exact() {
        let e = HashEmbedder::default();
        let v = embed_and_normalize(&e, "precision check").unwrap();
        for &x in &v.0 {
            assert_eq!(x, x as f32 as f64);
        }
    }
}
