//! Sealed object files.
//!
//! Layout: `PKAS1`, big-endian `u32` label length, label bytes, 12-byte
//! nonce, ChaCha20-Poly1305 ciphertext. The label is the associated data.

use chacha20poly1305::aead::{Aead, KeyInit, Payload};
use chacha20poly1305::{ChaCha20Poly1305, Nonce};
use pkas::Key;
use rand::RngCore;

pub const MAGIC: &[u8; 5] = b"PKAS1";
pub const NONCE_LEN: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SealedHeader<'a> {
    pub label: String,
    pub nonce: [u8; NONCE_LEN],
    pub ciphertext: &'a [u8],
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SealError {
    #[error("not a sealed object: {0}")]
    Format(&'static str),
    #[error("authentication failed")]
    Authentication,
}

pub fn seal<R: RngCore>(key: &Key, label: &str, plaintext: &[u8], rng: &mut R) -> Vec<u8> {
    let mut nonce = [0u8; NONCE_LEN];
    rng.fill_bytes(&mut nonce);
    let cipher = ChaCha20Poly1305::new(key.as_bytes().into());
    let ciphertext = cipher
        .encrypt(Nonce::from_slice(&nonce), Payload { msg: plaintext, aad: label.as_bytes() })
        .expect("encryption of an in-memory buffer cannot fail");
    let label_len = u32::try_from(label.len()).expect("label shorter than 4 GiB");
    let mut out = Vec::with_capacity(MAGIC.len() + 4 + label.len() + NONCE_LEN + ciphertext.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&label_len.to_be_bytes());
    out.extend_from_slice(label.as_bytes());
    out.extend_from_slice(&nonce);
    out.extend_from_slice(&ciphertext);
    out
}

/// Splits a sealed file without touching the ciphertext.
pub fn parse(sealed: &[u8]) -> Result<SealedHeader<'_>, SealError> {
    let rest = sealed.strip_prefix(MAGIC.as_slice()).ok_or(SealError::Format("bad magic"))?;
    let (len, rest) = rest.split_first_chunk::<4>().ok_or(SealError::Format("truncated header"))?;
    let len = u32::from_be_bytes(*len) as usize;
    if rest.len() < len {
        return Err(SealError::Format("truncated label"));
    }
    let (label, rest) = rest.split_at(len);
    let label = std::str::from_utf8(label).map_err(|_| SealError::Format("label is not UTF-8"))?;
    let (nonce, ciphertext) = rest.split_first_chunk::<NONCE_LEN>().ok_or(SealError::Format("truncated nonce"))?;
    Ok(SealedHeader { label: label.to_string(), nonce: *nonce, ciphertext })
}

pub fn open(key: &Key, header: &SealedHeader<'_>) -> Result<Vec<u8>, SealError> {
    let cipher = ChaCha20Poly1305::new(key.as_bytes().into());
    cipher
        .decrypt(
            Nonce::from_slice(&header.nonce),
            Payload { msg: header.ciphertext, aad: header.label.as_bytes() },
        )
        .map_err(|_| SealError::Authentication)
}
