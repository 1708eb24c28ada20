//! Pure payload computations behind the executable primitives.
//!
//! Payloads are byte strings. Numbers cross the wire big-endian without
//! leading zeros; the helpers here parse and emit that form. The cipher is
//! a hash-based counter stream, the MAC is HMAC-SHA-256, and the signature
//! pair is a tagged MAC stand-in so two-party examples run without a full
//! asymmetric scheme.

use num_bigint::BigUint;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct EvalError(pub String);

fn err(message: impl Into<String>) -> EvalError {
    EvalError(message.into())
}

/// Parse a literal from model text: `0x…` is raw hex (byte-exact, even
/// digit count), an all-digit string is a big-endian number, anything else
/// is UTF-8 text.
pub fn parse_literal(text: &str) -> Result<Vec<u8>, EvalError> {
    if let Some(hex) = text.strip_prefix("0x").or_else(|| text.strip_prefix("0X")) {
        if hex.len() % 2 != 0 {
            return Err(err(format!("hex literal {text:?} has an odd digit count")));
        }
        return (0..hex.len())
            .step_by(2)
            .map(|i| {
                u8::from_str_radix(&hex[i..i + 2], 16)
                    .map_err(|_| err(format!("hex literal {text:?} has non-hex digits")))
            })
            .collect();
    }
    if !text.is_empty() && text.bytes().all(|b| b.is_ascii_digit()) {
        let n: BigUint = text.parse().expect("all-digit string parses");
        return Ok(n.to_bytes_be());
    }
    Ok(text.as_bytes().to_vec())
}

pub fn sha256(data: &[u8]) -> [u8; 32] {
    Sha256::digest(data).into()
}

/// First eight hex digits of the payload's SHA-256, as used in traces.
pub fn short_hash(payload: &[u8]) -> String {
    let digest = sha256(payload);
    digest[..4].iter().map(|b| format!("{b:02x}")).collect()
}

pub fn hmac_sha256(key: &[u8], msg: &[u8]) -> [u8; 32] {
    let mut block = [0u8; 64];
    if key.len() > 64 {
        block[..32].copy_from_slice(&sha256(key));
    } else {
        block[..key.len()].copy_from_slice(key);
    }
    let mut inner = Sha256::new();
    inner.update(block.map(|b| b ^ 0x36));
    inner.update(msg);
    let mut outer = Sha256::new();
    outer.update(block.map(|b| b ^ 0x5c));
    outer.update(inner.finalize());
    outer.finalize().into()
}

const SIGN_TAG: &[u8] = b"sig\x00";

/// Keyed signature stand-in: an HMAC over a tagged message.
pub fn sign_tag(key: &[u8], msg: &[u8]) -> [u8; 32] {
    let mut tagged = Vec::with_capacity(SIGN_TAG.len() + msg.len());
    tagged.extend_from_slice(SIGN_TAG);
    tagged.extend_from_slice(msg);
    hmac_sha256(key, &tagged)
}

/// g^x mod m as minimal big-endian bytes.
pub fn dh_public(g: &[u8], m: &[u8], x: &[u8]) -> Result<Vec<u8>, EvalError> {
    let m = BigUint::from_bytes_be(m);
    if m < BigUint::from(2u8) {
        return Err(err("modulus must be at least 2"));
    }
    let g = BigUint::from_bytes_be(g);
    let x = BigUint::from_bytes_be(x);
    Ok(g.modpow(&x, &m).to_bytes_be())
}

/// peer^x mod m as minimal big-endian bytes.
pub fn dh_shared(m: &[u8], x: &[u8], peer: &[u8]) -> Result<Vec<u8>, EvalError> {
    dh_public(peer, m, x)
}

/// XOR the data against a counter keystream: block i is
/// SHA-256(key || BE64(ctr + i)). Encryption and decryption are the same
/// operation. The counter payload must fit in eight bytes and wraps.
pub fn ctr_xor(key: &[u8], ctr: &[u8], data: &[u8]) -> Result<Vec<u8>, EvalError> {
    let start = u64_from_payload(ctr)
        .ok_or_else(|| err(format!("counter payload is {} bytes, at most 8 allowed", ctr.len())))?;
    let mut out = Vec::with_capacity(data.len());
    for (i, chunk) in data.chunks(32).enumerate() {
        let mut h = Sha256::new();
        h.update(key);
        h.update(start.wrapping_add(i as u64).to_be_bytes());
        let block: [u8; 32] = h.finalize().into();
        out.extend(chunk.iter().zip(block.iter()).map(|(d, k)| d ^ k));
    }
    Ok(out)
}

/// Big-endian payload to u64 if it fits in eight bytes.
pub fn u64_from_payload(payload: &[u8]) -> Option<u64> {
    if payload.len() > 8 {
        return None;
    }
    Some(payload.iter().fold(0u64, |acc, b| (acc << 8) | *b as u64))
}

/// Length-prefix each part with a big-endian u32 and concatenate.
pub fn encode_frames(parts: &[&[u8]]) -> Vec<u8> {
    let mut out = Vec::new();
    for part in parts {
        out.extend_from_slice(&(part.len() as u32).to_be_bytes());
        out.extend_from_slice(part);
    }
    out
}

/// Inverse of [`encode_frames`]; trailing or truncated bytes are an error.
pub fn decode_frames(data: &[u8]) -> Result<Vec<Vec<u8>>, EvalError> {
    let mut parts = Vec::new();
    let mut rest = data;
    while !rest.is_empty() {
        if rest.len() < 4 {
            return Err(err("truncated frame header"));
        }
        let len = u32::from_be_bytes(rest[..4].try_into().expect("four bytes")) as usize;
        rest = &rest[4..];
        if rest.len() < len {
            return Err(err(format!("frame claims {len} bytes, {} available", rest.len())));
        }
        parts.push(rest[..len].to_vec());
        rest = &rest[len..];
    }
    Ok(parts)
}

/// Cut the payload into `outputs` pieces. With `outputs - 1` lengths the
/// last piece takes the remainder; with `outputs` lengths the cut must
/// consume the payload exactly.
pub fn split_lengths(data: &[u8], lengths: &[usize], outputs: usize) -> Result<Vec<Vec<u8>>, EvalError> {
    if lengths.len() + 1 != outputs && lengths.len() != outputs {
        return Err(err(format!(
            "split into {outputs} outputs needs {} or {} lengths, got {}",
            outputs.saturating_sub(1),
            outputs,
            lengths.len()
        )));
    }
    let mut parts = Vec::with_capacity(outputs);
    let mut rest = data;
    for len in lengths {
        if *len > rest.len() {
            return Err(err(format!("split length {len} exceeds the {} bytes left", rest.len())));
        }
        parts.push(rest[..*len].to_vec());
        rest = &rest[*len..];
    }
    if lengths.len() == outputs {
        if !rest.is_empty() {
            return Err(err(format!("split leaves {} bytes unconsumed", rest.len())));
        }
    } else {
        parts.push(rest.to_vec());
    }
    Ok(parts)
}

/// Printable form of a payload for messages: quoted text when it is clean
/// UTF-8, hex otherwise.
pub fn repr(payload: &[u8]) -> String {
    match std::str::from_utf8(payload) {
        Ok(s) if !s.is_empty() && s.chars().all(|c| !c.is_control()) => format!("{s:?}"),
        _ => {
            let hex: String = payload.iter().map(|b| format!("{b:02x}")).collect();
            format!("0x{hex}")
        }
    }
}
