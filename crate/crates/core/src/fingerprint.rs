//! Stable hex digests used for sample ids, dataset fingerprints and model ids.

use sha2::{Digest, Sha256};

/// Incremental SHA-256 over length-prefixed fields, so that `("ab", "c")` and
/// `("a", "bc")` hash differently.
#[derive(Default, Clone)]
pub struct Fingerprint {
    hasher: Sha256,
}

impl Fingerprint {
    pub fn new(domain: &str) -> Self {
        let mut fp = Fingerprint::default();
        fp.str(domain);
        fp
    }

    pub fn bytes(&mut self, bytes: &[u8]) -> &mut Self {
        self.hasher.update((bytes.len() as u64).to_le_bytes());
        self.hasher.update(bytes);
        self
    }

    pub fn str(&mut self, s: &str) -> &mut Self {
        self.bytes(s.as_bytes())
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.hasher.update(v.to_le_bytes());
        self
    }

    pub fn f64(&mut self, v: f64) -> &mut Self {
        self.u64(v.to_bits())
    }

    pub fn tokens(&mut self, tokens: &[u32]) -> &mut Self {
        self.u64(tokens.len() as u64);
        for t in tokens {
            self.hasher.update(t.to_le_bytes());
        }
        self
    }

    pub fn hex(self) -> String {
        to_hex(&self.hasher.finalize())
    }

    /// First 8 bytes of the digest, for seeding RNGs.
    pub fn seed(self) -> u64 {
        let digest = self.hasher.finalize();
        u64::from_le_bytes(digest[..8].try_into().expect("sha256 digest is 32 bytes"))
    }
}

pub fn to_hex(bytes: &[u8]) -> String {
    use std::fmt::Write;
    bytes.iter().fold(String::with_capacity(bytes.len() * 2), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    to_hex(&Sha256::digest(bytes))
}
