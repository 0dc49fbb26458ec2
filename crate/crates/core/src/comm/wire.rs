//! Frame encoding used by the socket transport.
//!
//! A frame is `tag: u32`, `length: u64` (payload size in bytes), then the
//! payload as little-endian `f64` pairs `(re, im)`. All integers are
//! little-endian.

use std::io::{self, Read, Write};

use num_complex::Complex64;

use super::TransportError;

pub const HEADER_LEN: usize = 12;
const AMP_BYTES: usize = 16;

pub fn encode_frame(tag: u32, payload: &[Complex64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len() * AMP_BYTES);
    out.extend_from_slice(&tag.to_le_bytes());
    out.extend_from_slice(&((payload.len() * AMP_BYTES) as u64).to_le_bytes());
    for c in payload {
        out.extend_from_slice(&c.re.to_le_bytes());
        out.extend_from_slice(&c.im.to_le_bytes());
    }
    out
}

pub fn write_frame<W: Write>(w: &mut W, tag: u32, payload: &[Complex64]) -> io::Result<()> {
    w.write_all(&encode_frame(tag, payload))?;
    w.flush()
}

/// Read one frame; `Ok(None)` on a clean end of stream before any header byte.
pub fn read_frame<R: Read>(r: &mut R) -> Result<Option<(u32, Vec<Complex64>)>, TransportError> {
    let mut header = [0u8; HEADER_LEN];
    let mut filled = 0;
    while filled < HEADER_LEN {
        match r.read(&mut header[filled..]) {
            Ok(0) if filled == 0 => return Ok(None),
            Ok(0) => return Err(TransportError::Protocol("truncated header".into())),
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let tag = u32::from_le_bytes(header[..4].try_into().expect("4 bytes"));
    let len = u64::from_le_bytes(header[4..].try_into().expect("8 bytes"));
    if len % AMP_BYTES as u64 != 0 {
        return Err(TransportError::Protocol(format!(
            "payload length {len} is not a whole number of amplitudes"
        )));
    }
    let mut bytes = vec![0u8; len as usize];
    r.read_exact(&mut bytes)?;
    let payload = bytes
        .chunks_exact(AMP_BYTES)
        .map(|b| {
            Complex64::new(
                f64::from_le_bytes(b[..8].try_into().expect("8 bytes")),
                f64::from_le_bytes(b[8..].try_into().expect("8 bytes")),
            )
        })
        .collect();
    Ok(Some((tag, payload)))
}
